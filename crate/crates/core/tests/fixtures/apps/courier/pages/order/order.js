Page({
  data: { phone: '' },
  inputPhone: function (e) {
    this.setData({ phone: e.detail.value });
    wx.setStorageSync('phone', e.detail.value);
  },
  submitOrder: function () {
    var that = this;
    wx.request({
      url: 'https://courier.example.com/order',
      data: { phone: that.data.phone },
      success: function (res) {
        wx.showToast({ title: 'ok' });
      }
    });
  }
});
